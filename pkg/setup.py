#!/usr/bin/env python
import os
import sys
import re

# require python 3.9 or newer
if sys.version_info < (3, 9):
    print("Error: nlperspective does not support this version of Python.")
    print("Please upgrade to Python 3.9 or higher.")
    sys.exit(1)

# require version of setuptools that supports find_namespace_packages
from setuptools import setup

try:
    from setuptools import find_namespace_packages
except ImportError:
    # the user has a downlevel version of setuptools.
    print("Error: nlperspective requires setuptools v40.1.0 or higher.")
    print('Please upgrade setuptools with "pip install --upgrade setuptools" ' "and try again")
    sys.exit(1)


# pull long description from README
this_directory = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(this_directory, "README.md"), "r", encoding="utf8") as f:
    long_description = f.read()


# get this package's version from nlperspective/__version__.py
def _get_package_version():
    _version_path = os.path.join(this_directory, "nlperspective", "__version__.py")
    _semver = r"""(?P<major>\d+)\.(?P<minor>\d+)\.(?P<patch>\d+)"""
    _pre = r"""((?P<prekind>a|b|rc)(?P<pre>\d+))?"""
    _version_pattern = rf"""version\s*=\s*["']{_semver}{_pre}["']"""
    with open(_version_path) as f:
        match = re.search(_version_pattern, f.read().strip())
        if match is None:
            raise ValueError(f"invalid version at {_version_path}")
        parts = match.groupdict()
    pre = f"{parts['prekind']}{parts['pre']}" if parts["prekind"] else ""
    return "{major}.{minor}.{patch}".format(**parts) + pre


package_name = "nlperspective"
package_version = _get_package_version()
description = """Perspective functions with nonlinear scaling, their envelopes and a grid conjugate oracle"""

setup(
    name=package_name,
    version=package_version,
    description=description,
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_namespace_packages(include=["nlperspective", "nlperspective.*"]),
    include_package_data=True,
    package_data={"nlperspective.include": ["presets/*.json"]},
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "dbt-common>=1.0,<2.0",
        "dbt-adapters>=1.0,<2.0",
        "click>=8.1,<9.0",
    ],
    entry_points={"console_scripts": ["nlperspective=nlperspective.cli:cli"]},
    zip_safe=False,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: Microsoft :: Windows",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
)
