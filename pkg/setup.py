from setuptools import setup, find_packages

setup(
    name="qiterative",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    install_requires=["numpy", "scipy", "matplotlib", "Pillow"],
    extras_require={"test": ["pytest", "hypothesis"]},
    entry_points={"console_scripts": ["qiterative=qiterative.cli:main"]},
)
