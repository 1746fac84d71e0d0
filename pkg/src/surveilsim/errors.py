"""Shared exception types."""


class DegenerateLikelihoodError(ValueError):
    """A likelihood took a value that makes the update it feeds meaningless."""


class ScenarioError(ValueError):
    """Scenario configuration failed validation; carries all messages found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
