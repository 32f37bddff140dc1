import functools
import hashlib
import io
import logging
import sys
import time
from pathlib import Path

import pandas as pd

VERSION = "0.3.0"

MAX_QUBITS = 30
GATHER_MAX_QUBITS = 26
ORACLE_MAX_QUBITS = 10
NORM_TOLERANCE = 1e-8
NORM_DRIFT_GUARD = 1e-9

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


class InputFormatError(ValueError):
    pass


class NumericalGuardError(ArithmeticError):
    pass


def timer(func):
    # Logs the execution time of the function object passed
    @functools.wraps(func)
    def wrap_func(*args, **kwargs):
        t1 = time.perf_counter()
        result = func(*args, **kwargs)
        t2 = time.perf_counter()
        logging.getLogger(func.__module__).info(f"{func.__name__}: {(t2-t1):.1f}s")
        return result

    return wrap_func


def transform(line, transformers):
    for regex, transformer in transformers:
        match = regex.match(line)
        if match:
            return tuple(extract(match, t) for t in transformer)
    raise InputFormatError(f"No format matches line: {line!r}")


def extract(match, extractor):
    return match.group(extractor) if isinstance(extractor, int) else extractor


def content_lines(text):
    """Yield (line number, stripped line) for non-blank, non-comment lines."""
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_text(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"File not readable: {path}")
    return path.read_text()


def content_hash(data):
    # Same digest as `git hash-object`
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def format_header(header):
    return "".join(f"# {key}: {value}\n" for key, value in header.items())


def write_report(df, path, header=None, footer=None):
    """Write header comments, the CSV body and an optional footer table."""
    buffer = io.StringIO()
    buffer.write(format_header(header or {}))
    df.to_csv(buffer, index=False, float_format="%.12g")
    if footer is not None:
        buffer.write("\n")
        footer.to_csv(buffer, index=False, float_format="%.12g")
    text = buffer.getvalue()

    if path is None:
        sys.stdout.write(text)
    else:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        logger.info(f"wrote {path}")
    return text


def read_report(path):
    """Read back a report; returns (body, footer or None, header dict)."""
    text = Path(path).read_text()
    header = {}
    body_lines = []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = value
        else:
            body_lines.append(line)

    sections = "\n".join(body_lines).strip().split("\n\n")
    body = pd.read_csv(io.StringIO(sections[0]))
    footer = pd.read_csv(io.StringIO(sections[1])) if len(sections) > 1 else None
    body.attrs.update(header)
    return body, footer, header
