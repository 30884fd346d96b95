"""Exception hierarchy shared by the routing, simulation and scenario layers."""


class ResidueError(ValueError):
    """Base class for route-ID arithmetic failures."""


class NotCoprime(ResidueError):
    pass


class ModuliNotCoprime(ResidueError):
    pass


class RouteIdOverflow(ResidueError):
    pass


class UnknownLink(LookupError):
    """A path names two consecutive nodes that share no link."""


class EventOverflow(RuntimeError):
    """The pending-event set grew past the configured safety bound."""


class MigrationError(ValueError):
    pass


class RouteMismatch(MigrationError):
    pass


class MigrationRejected(MigrationError):
    pass


class ScenarioError(ValueError):
    """Raised with every parse/validation problem found in a scenario file.

    ``errors`` is a list of ``(line_number, message)``; the line number is
    ``None`` for problems that do not belong to a single line.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.format_lines()))

    def format_lines(self):
        out = []
        for line, msg in self.errors:
            out.append(f"line {line}: {msg}" if line is not None else msg)
        return out
