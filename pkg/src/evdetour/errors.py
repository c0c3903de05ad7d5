"""Exception types shared across the package."""


class EvDetourError(Exception):
    """Base class for all package errors."""


class NetworkGenerationError(EvDetourError):
    def __init__(self, attempts: int, reason: str = ""):
        self.attempts = attempts
        msg = f"could not generate a valid network after {attempts} attempts"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class InvalidNetworkError(EvDetourError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(v.message for v in self.violations[:10])
        super().__init__(f"{len(self.violations)} network violation(s): {lines}")


class DisconnectedNetworkError(EvDetourError):
    pass


class InvalidNodeError(EvDetourError, IndexError):
    pass


class DegenerateAreaError(EvDetourError):
    pass


class DemandExhaustedError(EvDetourError):
    def __init__(self, collected: int, wanted: int, attempts: int):
        self.collected, self.wanted, self.attempts = collected, wanted, attempts
        super().__init__(
            f"collected only {collected}/{wanted} routes after {attempts} growth attempts"
        )


class UnknownBranchError(EvDetourError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class InvalidRouteError(EvDetourError, ValueError):
    pass


class InvalidPlanError(EvDetourError, ValueError):
    pass


class RouteSimulationError(EvDetourError):
    def __init__(self, route_index: int, cause: Exception):
        self.route_index = route_index
        super().__init__(f"route {route_index}: {cause}")


class GaConfigError(EvDetourError, ValueError):
    pass


class NoReplacementCandidateError(EvDetourError, ValueError):
    pass
