"""Workbench for an attribute-based broadcast calculus.

Submodules:

- ``syntax``: AST, names, substitution, canonical forms
- ``attributes``: environments, predicate satisfaction and equivalence
- ``parser``: concrete syntax for ``.abc`` files
- ``component``: single-component transition steps
- ``system``: full system-level semantics (broadcast, restriction)
- ``explorer``: bounded state-space construction and traces
- ``equivalence``: barbs, strong and weak bisimilarity
- ``bpi``: broadcast pi-calculus oracle, encoding, correspondence checks
- ``cli``: command line entry point
"""

__version__ = "0.1.0"
