"""Exception hierarchy shared by every stage of the estimator."""


class ModalSDRError(Exception):
    """Base class for all errors raised by modal_sdr."""


class InvalidInputError(ModalSDRError, ValueError):
    pass


class DimensionMismatchError(InvalidInputError):
    pass


class NearSingularCovarianceError(ModalSDRError):
    def __init__(self, eigenvalue, threshold):
        self.eigenvalue = float(eigenvalue)
        self.threshold = float(threshold)
        super().__init__(
            f"matrix is near singular: smallest eigenvalue {self.eigenvalue:.3e} "
            f"<= {self.threshold:.1e}"
        )


class RankDeficientError(ModalSDRError):
    def __init__(self, effective_rank, ncols):
        self.effective_rank = int(effective_rank)
        self.ncols = int(ncols)
        super().__init__(
            f"columns are rank deficient: effective rank {self.effective_rank} "
            f"of {self.ncols}"
        )


class DegenerateWeightsError(ModalSDRError):
    pass


class DegenerateResponseError(ModalSDRError):
    pass


class DegenerateRegressorError(ModalSDRError):
    pass


class DegenerateSpectrumError(ModalSDRError):
    pass


class DegenerateNeighborhoodError(ModalSDRError):
    def __init__(self, anchor):
        self.anchor = int(anchor)
        super().__init__(f"kernel mass underflows at anchor {self.anchor}")


class DivergenceError(ModalSDRError):
    def __init__(self, anchor, iteration):
        self.anchor = int(anchor)
        self.iteration = int(iteration)
        super().__init__(
            f"non-finite update at anchor {self.anchor}, iteration {self.iteration}"
        )


class InvariantViolationError(ModalSDRError):
    """An internal guarantee (e.g. EM ascent) was broken beyond tolerance."""


class EstimationFailedError(ModalSDRError):
    pass


class CsvFormatError(ModalSDRError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        loc = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{loc}")


class MissingColumnError(ModalSDRError, KeyError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} not found")

    def __str__(self):
        return self.args[0]
