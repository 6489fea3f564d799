""" This sub-package implements report formatters """
from . import delimited, text
