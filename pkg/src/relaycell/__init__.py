"""Relay-aided cellular downlink: closed-form energy/interference models and planning.

The package models a hexagonal cell whose sectors are assisted by
decode-forward relay stations under log-normal shadowing.  It provides

* closed-form per-location relaying probability, expected RF energy and
  relay-generated interference,
* an embedded Monte-Carlo oracle to validate every closed-form quantity,
* deployment metrics (energy per unit area, gain-to-loss ratio) with
  exhaustive relay-placement search and per-location coding-scheme maps,
* a CLI emitting deterministic CSV artifacts.
"""

from relaycell.stats import LogNormal

__all__ = ["LogNormal"]
__version__ = "0.1.0"
