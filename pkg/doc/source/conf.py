"""Sphinx configuration for the GRAN docs."""

from datetime import datetime

project = "GRAN"
copyright = "{}, GRAN developers".format(datetime.now().year)
author = "GRAN developers"

extensions = ["sphinx_rtd_theme"]
templates_path = ["_templates"]
exclude_patterns = ["_build"]

html_theme = "sphinx_rtd_theme"
html_theme_options = {
    "display_version": True,
    "prev_next_buttons_location": "bottom",
    "collapse_navigation": False,
    "sticky_navigation": True,
    "navigation_depth": 2,
}
html_static_path = []
