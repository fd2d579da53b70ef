"""Multiplicative chaos measures from killed planar random walks.

Subpackage map:
  geometry  exact disc analytics (Green function, hitting laws, first moments)
  bessel    squared-Bessel transition laws, limit constants, angular densities
  walk      lattice walk engine, occupation fields, local-time estimators
  chaos     chaos measure builders, thick points, heatmap rendering
  verify    statistical checks and the suite report machinery
  acceptance end-to-end acceptance criteria as runnable checks
  cli       command-line front end
"""

__version__ = "0.1.0"
