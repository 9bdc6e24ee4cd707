"""
outfitgen - outfit compatibility and personalized outfit generation benchmark
"""
