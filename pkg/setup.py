from setuptools import find_packages, setup

with open('cofforge/version.py') as f:
  exec(f.read(), globals())

description = ('Chain-of-frames dataset generation, curation and evaluation for video question answering.')

# Reading long Description from README.md file.
with open("README.md", "r") as fh:
  long_description = fh.read()

# Read in requirements
requirements = [
    requirement.strip() for requirement in open('requirements.txt').readlines()
]

setup(
    name='cofforge',
    version=__version__,
    python_requires=('>=3.8.0'),
    install_requires=requirements,
    extras_require={'test': ['pytest>=7.0', 'hypothesis>=6.0']},
    license='MIT',
    description=description,
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=['tests']),
    entry_points={'console_scripts': ['cof-forge=cofforge.cli:main']},
)
