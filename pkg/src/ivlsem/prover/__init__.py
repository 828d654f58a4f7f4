"""Entailment checking for path conditions.

Two back-ends share one interface: :class:`BuiltinProver`, an incomplete
in-process decision procedure, and :class:`SmtProver`, which talks
SMT-LIB2 to an external solver process.  Both answer only ``VALID`` or
``UNKNOWN``; ``UNKNOWN`` is always a safe answer.
"""

from __future__ import annotations

import enum
import os
import shlex
from typing import Iterable, Union

from ..terms import Term


class Verdict(enum.Enum):
    VALID = "valid"
    UNKNOWN = "unknown"

    def __bool__(self) -> bool:
        return self is Verdict.VALID


PathCondition = Union[Term, Iterable[Term]]

SOLVER_ENV = "IVLSEM_SMT"


class Prover:
    """Base interface.  Subclasses implement :meth:`is_unsat`."""

    def is_unsat(self, pc: PathCondition) -> Verdict:
        raise NotImplementedError

    def entails(self, pc: PathCondition, goal: Term) -> Verdict:
        from ..terms import mk_not
        return self.is_unsat(_as_list(pc) + [mk_not(goal)])

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _as_list(pc: PathCondition) -> list:
    if isinstance(pc, Term):
        return [pc]
    return list(pc)


def make_prover(command: str | None = None) -> Prover:
    """The built-in prover, or an SMT-LIB client when a solver command is
    given (or set in the environment)."""
    command = command if command is not None else os.environ.get(SOLVER_ENV)
    if command:
        from .smtlib import SmtProver
        return SmtProver(shlex.split(command))
    from .builtin import BuiltinProver
    return BuiltinProver()


from .builtin import BuiltinProver  # noqa: E402
from .smtlib import SmtProver  # noqa: E402

__all__ = ["Verdict", "Prover", "BuiltinProver", "SmtProver", "make_prover", "SOLVER_ENV"]
