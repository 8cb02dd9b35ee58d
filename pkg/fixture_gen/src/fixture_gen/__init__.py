"""Fixture generation for the model-dump parsers.

Trains tiny reference models, dumps them in their native formats, and
records input/prediction pairs. Outputs are committed under
``fixtures/`` so the main test suite never runs this package.

Two generators exist per framework:

* ``reference-library``: train with the real lightgbm/xgboost package
  and record its own predictions (preferred; used when the framework
  is importable).
* ``builtin-emitter``: train through the main package's CLI, convert
  the native JSON dump into the external format with an emitter here,
  and record predictions from a standalone interpreter of the emitted
  dump. The interpreter shares no code with the main package, so
  parser parity is still a two-implementation check.
"""

from .spec import FixtureSpec, load_spec
from .generate import generate_fixture

__all__ = ["FixtureSpec", "load_spec", "generate_fixture"]
