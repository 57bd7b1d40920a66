"""
ration_lab - fair sequential rationing under correlated demand
"""
__version__ = "1.0.0"
