from setuptools import setup

setup(
	# The configuration is done in setup.cfg
	# https://setuptools.readthedocs.io/en/latest/setuptools.html#configuring-setup-using-setup-cfg-files
	# note: this requires setuptools = '>30.3.0'
)
