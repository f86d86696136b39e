"""Package setup."""

import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="gran",
    version="1.0.0",
    description="Ghost residual attention super-resolution toolkit",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=[
        "joblib",
        "numpy>=1.20",
        "opencv-python-headless",
        "pillow",
        "pydantic>=1.8,<2",
        "scikit-image>=0.19",
        "tabulate",
        "toml",
        "tqdm",
    ],
    entry_points={"console_scripts": ["gran=gran.run:main"]},
    package_data={"gran": ["configs/*.toml", "py.typed"]},
    include_package_data=True,
)
