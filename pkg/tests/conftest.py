import hypothesis

hypothesis.settings.register_profile("detectlab", deadline=None, max_examples=60)
hypothesis.settings.load_profile("detectlab")
