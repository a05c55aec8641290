# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

from setuptools import setup, find_packages


setup(
    name="pychase",
    version="0.1.0",
    packages=find_packages(),
    license="BSD-3-Clause",
    description="Chebyshev-filtered subspace iteration for dense Hermitian "
                "eigenproblems on a simulated 2D process grid.",
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pyyaml",
        "psutil",
    ],
    extras_require={
        "test": ["pytest"],
    },
    entry_points={
        "console_scripts":
        ["pychase=pychase._cli:main"]
    },
    package_data={
        'pychase.tests': ['data/*'],
    },
    zip_safe=False,
)
