"""Exception hierarchy with module-qualified error codes.

Every error raised by this package carries a ``code`` of the form
``<module>.<ErrorName>`` so CLI and service layers can report failures
uniformly.
"""

from __future__ import annotations


class ForesightError(Exception):
    """Base class; ``code`` identifies the failing module and condition."""

    code = "foresight.Error"

    def __init__(self, message: str = ""):
        super().__init__(f"{self.code}: {message}" if message else self.code)
        self.message = message


# corpus ---------------------------------------------------------------

class MalformedJson(ForesightError):
    code = "corpus.MalformedJson"

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


class SchemaViolation(ForesightError):
    code = "corpus.SchemaViolation"


class EmptyCorpus(ForesightError):
    code = "corpus.EmptyCorpus"


class UnknownLabel(ForesightError):
    code = "corpus.UnknownLabel"


class TooFewDialogues(ForesightError):
    code = "corpus.TooFewDialogues"


# lexicon --------------------------------------------------------------

class MalformedRow(ForesightError):
    code = "lexicon.MalformedRow"

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class ScoreOutOfRange(ForesightError):
    code = "lexicon.ScoreOutOfRange"


class OutOfRange(ForesightError):
    code = "lexicon.OutOfRange"


# user_state -----------------------------------------------------------

class RoundOutOfRange(ForesightError):
    code = "user_state.RoundOutOfRange"


# nn -------------------------------------------------------------------

class ShapeMismatch(ForesightError):
    code = "nn.ShapeMismatch"


class HeadsDivisibility(ForesightError):
    code = "nn.HeadsDivisibility"


class EmptySequence(ForesightError):
    code = "nn.EmptySequence"


class EmptyMemory(ForesightError):
    code = "nn.EmptyMemory"


class GraphCycle(ForesightError):
    code = "nn.GraphCycle"


# seqmodel / feedback --------------------------------------------------

class PrefixTooLong(ForesightError):
    code = "seqmodel.PrefixTooLong"


class EmptyTraining(ForesightError):
    code = "seqmodel.EmptyTraining"


class DivergedLoss(ForesightError):
    code = "seqmodel.DivergedLoss"


class SequenceTooLong(ForesightError):
    code = "feedback.SequenceTooLong"


class VersionMismatch(ForesightError):
    code = "checkpoint.VersionMismatch"


class Corrupt(ForesightError):
    code = "checkpoint.Corrupt"


# planner --------------------------------------------------------------

class EmptyFutures(ForesightError):
    code = "planner.EmptyFutures"


class SpaceTooLarge(ForesightError):
    code = "planner.SpaceTooLarge"


# eval -----------------------------------------------------------------

class EmptyMatrix(ForesightError):
    code = "eval.EmptyMatrix"


class EmptyDecisions(ForesightError):
    code = "eval.EmptyDecisions"


# config ---------------------------------------------------------------

class ConfigError(ForesightError):
    code = "config.ConfigError"
