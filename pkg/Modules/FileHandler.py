# FileHandler.py
# Version: 3.0

"""
/********************************************************************
***  FILE  : FileHandler.py                                       ***
*********************************************************************
***  DESCRIPTION :                                                 ***
***  This module defines a FileHandler class that manages the file  ***
***  operations of the certifier: reading config text, writing and  ***
***  reading radial profiles (CSV), and writing and reading the     ***
***  structured reports (JSON).                                     ***
***                                                                  ***
***  - open_file(file_path):                                       ***
***      Opens the file and yields each line using a generator.     ***
***                                                                  ***
***  - read_file_as_string(file_name):                             ***
***      Reads the whole file into a string.                        ***
***                                                                  ***
***  - write_string_to_file(file_name, content):                   ***
***      Writes a string to a file, creating parent directories.    ***
***                                                                  ***
***  - write_profile(path, r, v, u, dim) / read_profile(path):     ***
***      Profile CSV with a '# dim=.. radius=.. nodes=..' header     ***
***      and r,v,u columns written with 17 significant digits.      ***
***                                                                  ***
***  - write_json(path, data) / read_json(path):                   ***
***      Structured reports.                                        ***
***                                                                  ***
***  Every failure is raised as FileFormatError with the path and,   ***
***  where it is known, the line number.                            ***
********************************************************************/
"""

import json
import os
import sys
from dataclasses import dataclass
from typing import Any, Dict, Iterator

import numpy as np

repo_home_path = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
sys.path.append(repo_home_path)

from Modules.Definitions import FileFormatError
from Modules.Logger import Logger

PROFILE_COLUMNS = ("r", "v", "u")
GRID_TOLERANCE = 1e-12


@dataclass
class ProfileData:
    dim: int
    radius: float
    nodes: int
    r: np.ndarray
    v: np.ndarray
    u: np.ndarray


def _json_default(value):
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


class FileHandler:
    """
    FileHandler is the single place where the certifier touches the disk.

    Reading returns parsed data or raises FileFormatError; writing creates
    the parent directory when needed.
    """

    def __init__(self):
        self.logger = Logger()
        self.logger.debug("Initializing FileHandler.")

    # ----------------------------------------------------------------
    # Plain text
    # ----------------------------------------------------------------
    def open_file(self, file_path: str) -> Iterator[str]:
        """
        Opens the specified file and yields each line one at a time.

        Raises FileFormatError when the file is missing or unreadable.
        """
        try:
            with open(file_path, "r", encoding="utf-8") as file:
                for line in file:
                    yield line
        except FileNotFoundError:
            self.logger.error(f"File not found: {file_path}")
            raise FileFormatError("file not found", path=file_path) from None
        except (PermissionError, IsADirectoryError, UnicodeDecodeError) as e:
            self.logger.error(f"Could not read {file_path}: {e}")
            raise FileFormatError(f"could not read file: {e}", path=file_path) from None

    def read_file_as_string(self, file_name: str) -> str:
        return "".join(self.open_file(file_name))

    def write_string_to_file(self, file_name: str, content: str):
        directory = os.path.dirname(file_name)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(file_name, "w", encoding="utf-8") as file:
                file.write(content)
        except OSError as e:
            self.logger.error(f"An error occurred while writing to {file_name}: {e}")
            raise FileFormatError(f"could not write file: {e}", path=file_name) from None
        self.logger.info(f"Wrote {file_name}")

    # ----------------------------------------------------------------
    # Profiles
    # ----------------------------------------------------------------
    def write_profile(self, file_name: str, r: np.ndarray, v: np.ndarray, u: np.ndarray, dim: int):
        radius = float(r[-1])
        lines = [f"# dim={dim} radius={radius:.17g} nodes={len(r)}", ",".join(PROFILE_COLUMNS)]
        for row in zip(r, v, u):
            lines.append(",".join(f"{value:.17g}" for value in row))
        self.write_string_to_file(file_name, "\n".join(lines) + "\n")

    def read_profile(self, file_name: str) -> ProfileData:
        lines = list(self.open_file(file_name))
        if len(lines) < 2:
            raise FileFormatError("profile needs a header line and a column line", path=file_name,
                                  line=len(lines) + 1)

        header = self._parse_profile_header(lines[0], file_name)
        columns = tuple(item.strip() for item in lines[1].split(","))
        if columns != PROFILE_COLUMNS:
            raise FileFormatError(f"expected columns {','.join(PROFILE_COLUMNS)}, got {lines[1].strip()!r}",
                                  path=file_name, line=2)

        rows = []
        for number, line in enumerate(lines[2:], start=3):
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != len(PROFILE_COLUMNS):
                raise FileFormatError(f"expected {len(PROFILE_COLUMNS)} values, got {len(cells)}",
                                      path=file_name, line=number)
            try:
                values = [float(cell) for cell in cells]
            except ValueError:
                raise FileFormatError(f"malformed number in {line.strip()!r}", path=file_name, line=number) from None
            if not all(np.isfinite(values)):
                raise FileFormatError("non-finite value in profile", path=file_name, line=number)
            rows.append(values)

        dim, radius, nodes = header
        if len(rows) != nodes:
            raise FileFormatError(f"header declares {nodes} nodes, found {len(rows)} rows",
                                  path=file_name, line=len(lines))
        data = np.array(rows)
        expected_r = np.linspace(0.0, radius, nodes)
        mismatch = np.nonzero(np.abs(data[:, 0] - expected_r) > GRID_TOLERANCE * max(radius, 1.0))[0]
        if mismatch.size:
            raise FileFormatError(f"radius column is not the uniform grid on [0, {radius:g}]",
                                  path=file_name, line=int(mismatch[0]) + 3)
        self.logger.debug(f"Read profile {file_name}: dim={dim}, R={radius:g}, n={nodes}")
        return ProfileData(dim=dim, radius=radius, nodes=nodes, r=data[:, 0].copy(),
                           v=data[:, 1].copy(), u=data[:, 2].copy())

    def _parse_profile_header(self, line: str, file_name: str):
        text = line.strip()
        if not text.startswith("#"):
            raise FileFormatError("profile header must start with '#'", path=file_name, line=1)
        fields: Dict[str, str] = {}
        for item in text[1:].split():
            key, sep, value = item.partition("=")
            if not sep:
                raise FileFormatError(f"malformed header item {item!r}", path=file_name, line=1)
            fields[key] = value
        try:
            dim = int(fields["dim"])
            radius = float(fields["radius"])
            nodes = int(fields["nodes"])
        except KeyError as e:
            raise FileFormatError(f"profile header is missing {e.args[0]!r}", path=file_name, line=1) from None
        except ValueError:
            raise FileFormatError(f"malformed profile header {text!r}", path=file_name, line=1) from None
        if dim < 3 or nodes < 2 or not radius > 0.0:
            raise FileFormatError(f"inadmissible profile header {text!r}", path=file_name, line=1)
        return dim, radius, nodes

    # ----------------------------------------------------------------
    # JSON
    # ----------------------------------------------------------------
    def write_json(self, file_name: str, data: Dict[str, Any]):
        self.write_string_to_file(file_name, json.dumps(data, indent=2, default=_json_default) + "\n")

    def read_json(self, file_name: str) -> Dict[str, Any]:
        text = self.read_file_as_string(file_name)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise FileFormatError(f"malformed JSON: {e.msg}", path=file_name, line=e.lineno) from None
        if not isinstance(data, dict):
            raise FileFormatError("expected a JSON object at the top level", path=file_name, line=1)
        return data


# End of FileHandler.py
