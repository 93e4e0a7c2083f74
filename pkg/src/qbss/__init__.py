"""q-Baskakov-Szasz-Stancu operators: q-calculus primitives, operator
evaluation with audited truncation, moments, statistical Korovkin
experiments and rate-of-convergence checks."""

__version__ = "0.1.0"
