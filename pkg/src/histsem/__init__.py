"""histsem: desk-scale toolkit for diachronic semantic change analysis.

Prepare decade-bucketed pre-training corpora, train/apply contextual
encoders (mock, toy, or external), build usage similarity matrices against
human judgments, and quantify change with Mantel tests, embedding-shift
statistics, and PCA cluster analysis.
"""

__version__ = "0.1.0"
