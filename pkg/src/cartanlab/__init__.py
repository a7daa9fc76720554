"""Numerical verification of Cartan connections on local models.

Subpackages by topic: ``lie_core`` and ``matrix_group`` (algebras and matrix
groups), ``forms`` (differential forms on charts), ``cartan``,
``chern_weil``, ``extension``, ``developing``, ``prolongation`` and ``jets``.
The command-line front end lives in ``cli``.
"""

__version__ = "0.1.0"
