import os

PACKAGE_PATH = os.path.dirname(__file__)
PRESETS_PATH = os.path.join(PACKAGE_PATH, "presets")
