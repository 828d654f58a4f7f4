"""An inhale/exhale intermediate verification language with executable
semantics, a symbolic-execution verifier and a parallel front end."""

__version__ = "0.1.0"
