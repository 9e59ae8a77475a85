"""
Services package for covest
Estimators, quantizers, the MIMO pipeline and the experiment harness
"""
