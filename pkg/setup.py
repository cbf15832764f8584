import os
import re
from setuptools import setup

BASE_PATH = os.path.dirname(os.path.abspath(__file__))
VERSION_STRING = ''
with open(os.path.join(BASE_PATH, 'covscreen', 'version.py')) as fp:
    content = fp.read()
    VERSION_STRING = re.findall(r"VERSION_STRING\s*=\s*\'(.*?)\'", content)[0]

setup(
    name='covscreen',
    version=VERSION_STRING,
    description='Covariance-insured variable screening for ultrahigh-dimensional linear regression',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    license='MIT',
    packages=['covscreen'],
    python_requires='>=3.8',
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.8',
        'pandas>=1.4',
        'scikit-learn>=1.1',
    ],
    extras_require={
        'tests': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': ['covscreen=covscreen.cli:main'],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
