# annealfem solver modules
__version__ = '0.1.0'
