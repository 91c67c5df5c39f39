"""Shared numeric formatting for CSV output (12 significant digits)."""


def fmt(x) -> str:
    # +0.0 normalizes negative zero so repeated runs are byte-identical
    return "%.12g" % (float(x) + 0.0)
