"""
Setup script for charflow
"""

from setuptools import setup, find_packages

DEV_MARKER = "# Development"


def read_requirements(path: str = "requirements.txt"):
    """Split requirements.txt into runtime and development pins at the Development header"""
    runtime, dev = [], []
    target = runtime
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith(DEV_MARKER):
                target = dev
            if line and not line.startswith("#"):
                target.append(line)
    return runtime, dev


with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

install_requires, dev_requires = read_requirements()

setup(
    name="charflow",
    version="0.1.0",
    author="charflow developers",
    description="Characteristic flows, self-linking and contact-type evidence for Hamiltonian structures",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.10",
    install_requires=install_requires,
    extras_require={"dev": dev_requires},
    entry_points={
        "console_scripts": [
            "charflow=src.main:main",
        ],
    },
    include_package_data=True,
    package_data={
        "": ["*.md", "*.txt", "*.toml"],
    },
)
