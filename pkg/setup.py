from setuptools import find_packages, setup


def readme():
    with open("README.md", "r") as f:
        return f.read()


setup(
    name="mixcomp",
    version="0.1.0",
    python_requires=">=3.8",
    description="Redundancy decomposition and blind compression of mixed-state quantum ensembles",
    long_description=readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["mixcomp.snapshots"]),
    license="Apache 2.0",
    install_requires=[
        "numpy >= 1.17, < 2.0",
        "scipy >= 1.4",
        "terminaltables>=3.1.0",
    ],
    extras_require={
        "test": [
            "black>=19.10b0",
            "flake8>=3.7.9",
            "hypothesis>=5.0",
            "isort>=4.3.21",
            "pytest>=6.0",
            "pytest-cov>=2.8.1",
            "pytest-xdist>=2.0",
            "pytype>=2020.1.24",
            "snapshottest>=0.6.0",
        ],
        "docs": [
            "mkdocs>=1.0.4",
            "mkdocs-material>=4.5.0",
            "pymdown-extensions>=6.2",
            "pyyaml>=5.1",
            "mkdocs-minify-plugin>=0.2.1",
        ],
    },
    entry_points={"console_scripts": ["mixcomp=mixcomp.cli:main"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Education",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
    ],
)
