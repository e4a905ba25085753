import hypothesis

hypothesis.settings.register_profile(
    "default", max_examples=30, deadline=None, derandomize=True
)
hypothesis.settings.register_profile(
    "thorough", max_examples=200, deadline=None
)
hypothesis.settings.load_profile("default")
