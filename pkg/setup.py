from setuptools import setup, find_packages

setup(
    name="coordconf",
    version="0.1.0",
    description="Coordinator/Configurator runtime for component-based robot software",
    license="MIT",
    packages=find_packages(include=["coordconf", "coordconf.*"]),
    python_requires=">=3.10",
    install_requires=[
        "typer>=0.9.0",
        "rich>=13.0.0",
        "pydantic>=2.0.0",
        "pyyaml>=6.0.0",
        "lark>=1.1.0",
    ],
    extras_require={
        "dev": ["pytest>=7.0.0", "hypothesis>=6.0.0"],
    },
    entry_points={
        "console_scripts": [
            "coordconf=coordconf.cli:app",
        ],
    },
)
