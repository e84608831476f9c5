"""Runs notebook cells top-down in one namespace and records the first failure.

usage: python runner.py <cells.json> <result.json>
"""
import json
import sys
import traceback


def display(*objs, **kwargs):
    for obj in objs:
        print(obj)


def write(path, result):
    with open(path, "w") as f:
        json.dump(result, f)


def main():
    cells_path, out_path = sys.argv[1], sys.argv[2]
    with open(cells_path) as f:
        cells = json.load(f)
    namespace = {"__name__": "__main__", "display": display}
    result = {"cells_run": 0, "failed_at": None, "traceback": None}
    write(out_path, result)
    for cell in cells:
        try:
            code = compile(cell["source"], "<cell %d>" % cell["position"], "exec")
            exec(code, namespace)
        except BaseException:
            result["failed_at"] = cell["position"]
            result["traceback"] = traceback.format_exc()
        result["cells_run"] += 1
        write(out_path, result)
        sys.stdout.flush()
        if result["failed_at"] is not None:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
