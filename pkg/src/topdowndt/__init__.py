"""Exact tools for greedy top-down decision tree induction.

Modules:
    boolfn        boolean functions as exact truth tables
    tree          persistent decision trees (binary and thresholded)
    impurity      impurity functions and strong-concavity checks
    grower        greedy growth with per-iteration guarantee monitoring
    oracle        brute-force optimal trees and max-influence bounds
    hardinstance  structured targets on which greedy growth stalls
    realvalued    CDF transforms, bit encoders, threshold rounding, growth on samples
    cli           experiment runner
"""

__version__ = "0.1.0"
