__version__ = "0.1.0"
__VERSION__ = __version__
