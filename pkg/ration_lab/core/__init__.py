"""
Core data models, demand oracles and the evaluation engine
"""
