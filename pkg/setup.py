#!/usr/bin/env python3
from setuptools import setup, find_packages

setup(
    name="flux-sense",
    version="1.0.0",
    description="Flux Sense - Kitaev phase estimation of magnetic flux with single and entangled qubits",
    author="Your Name",
    packages=find_packages(exclude=["tests"]),
    package_data={"src.data.presets": ["*.json"]},
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "mpmath>=1.3.0",
        "click>=8.1.0",
        "rich>=13.0.0",
        "pandas>=2.0.0",
    ],
    extras_require={
        "plots": ["matplotlib>=3.7.0"],
        "dev": ["pytest", "black", "flake8"],
    },
    entry_points={
        "console_scripts": [
            "flux-sense=src.cli:cli",
        ],
    },
)
