from setuptools import setup, find_packages

setup(
    name="essopt",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "benchmark"]),
    description="Day-ahead battery scheduling for grid-connected PV microgrids",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "test": ["pytest"],
        "benchmark": ["psutil"],
    },
    entry_points={
        "console_scripts": ["essopt=essopt.cli:main"],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
)
