#!/usr/bin/python
# -*- coding: utf-8 -*-
# \file setup.py
# \brief Packaging of nfloc
# \author nfloc developers
# \version 0.1
# \date 19 oct. 2026

import setuptools

with open('README.md', 'r') as fh:
    long_description = fh.read()

setuptools.setup(
    name='nfloc',
    version='0.1.0',
    description='Near-field wideband multi-user localization with TTD-based hybrid arrays',
    author='nfloc developers',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=['nfloc', 'nfloc.tools'],
    entry_points = {'console_scripts':[
        'nfloc=nfloc.tools.simulate:main',
    ]},
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved',
        'Operating System :: OS Independent',
    ],
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'scipy',
        'tqdm',
        'humanize',
    ],
    extras_require={
        'test': ['pytest', 'hypothesis'],
    },
      )
