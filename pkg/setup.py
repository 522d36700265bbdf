from pathlib import Path

from setuptools import find_packages, setup

HERE = Path(__file__).parent
with open(HERE / "README.md", encoding="utf-8") as f:
    LONG_DESCRIPTION = f.read()

setup(
    name="confounding-attribution",
    version="0.1.0",
    description="Attribute confounding bias to individual covariates with Shapley values over adjustment sets",
    long_description=LONG_DESCRIPTION,
    long_description_content_type="text/markdown",
    author="Christopher Tee",
    author_email="chris@georgian.io",
    license="MIT",
    python_requires=">=3.8",
    keywords=[
        "causal-inference",
        "confounding",
        "shapley-values",
        "treatment-effects",
        "feature-attribution",
    ],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    package_dir={"": "src"},
    packages=find_packages(where="src", exclude=("tests",)),
    install_requires=[
        "numpy>=1.22",
        "pandas>=1.4",
        "scipy>=1.9",
        "scikit-learn>=1.1",
        "tqdm",
    ],
    entry_points={
        "console_scripts": ["confounding-attribution=confounding_attribution.cli:main"]
    },
)
