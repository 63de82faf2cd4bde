from setuptools import setup

setup(
    name='lepage_spde',
    python_requires='>=3.8',
    author='Martin Privat',
    version='0.1.0',
    packages=['lepage_spde','lepage_spde.tests'],
    license='Creative Commons Attribution-Noncommercial-Share Alike license',
    description='LePage series simulation of heat and wave equations driven by stable noise',
    long_description=open('README.md').read(),
    install_requires=[
        "numpy>=1.20",
        "scipy",
        "opencv-python",
        "tqdm",
    ],
    entry_points={
        'console_scripts': ['lepage_spde=lepage_spde.cli_runner:main']
    }
)
