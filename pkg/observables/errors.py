class ObservablesError(Exception):
    """
    Base exception for every error raised by the package.

    Subclasses set `invariant` to the name of the violated invariant or
    precondition; the CLI prints it on failure.
    """

    invariant = "observables"
    context = "Observables error"

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)

    def __str__(self):
        return f"{self.context}: {self.message}"
