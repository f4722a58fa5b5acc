"""Run only the acceptance criteria and print the PASS/FAIL summary."""

import sys

import pytest

if __name__ == "__main__":
    sys.exit(pytest.main(["-q", "tests/test_acceptance.py", *sys.argv[1:]]))
