"""
Re-check an outcome-table file every time it changes.

Hand-editing a joint outcome table (or regenerating it from a simulation)
is easier with immediate feedback: this watcher re-runs the no-signalling
check and the p0 + p1 <= 1 + alpha comparison whenever the file is saved.

HOW IT WORKS
============

```
Editor / simulation
       │
       └──> writes tables/honest.csv
                   │
                   └──> [watchdog] File system event
                               │
                               └──> TableChangeHandler.on_modified()
                                           │
                                           ├──> Debounce check (2 sec)
                                           │
                                           └──> callback(path)
                                                       │
                                                       └──> parse, check, print
```

A file that fails to parse is reported and the watcher keeps running, so a
half-written table never stops it.

USAGE
=====

    $ python table_watcher.py tables/honest.csv

or, equivalently, through the main command line:

    $ python run_experiments.py nosig-check tables/honest.csv --watch

Stop with Ctrl+C.
"""

import argparse
import logging
import time
from pathlib import Path
from typing import Callable

from watchdog.events import FileSystemEventHandler
from watchdog.observers import Observer

from errors import SplitCommitmentError


logger = logging.getLogger(__name__)

DEBOUNCE_SECONDS = 2.0


# =============================================================================
# FILE SYSTEM WATCHER
# =============================================================================

class TableChangeHandler(FileSystemEventHandler):
    """
    Calls ``callback(path)`` when the watched table file is modified.

    Attributes:
        table_file: The file being watched
        callback: Check to run on every (debounced) change
        debounce_seconds: Events closer together than this are merged;
            editors often write a file in several steps
        clock: Time source, replaceable in tests
    """

    def __init__(self, table_file: Path, callback: Callable[[Path], None],
                 debounce_seconds: float = DEBOUNCE_SECONDS,
                 clock: Callable[[], float] = time.monotonic):
        self.table_file = Path(table_file).resolve()
        self.callback = callback
        self.debounce_seconds = debounce_seconds
        self.clock = clock
        self.last_checked = None

    def _is_target(self, event) -> bool:
        if event.is_directory:
            return False
        paths = [getattr(event, "src_path", None), getattr(event, "dest_path", None)]
        return any(p and Path(p).resolve() == self.table_file for p in paths)

    def on_modified(self, event):
        if not self._is_target(event):
            return
        now = self.clock()
        if self.last_checked is not None and now - self.last_checked < self.debounce_seconds:
            return
        self.last_checked = now
        logger.info("%s changed", self.table_file)
        try:
            self.callback(self.table_file)
        except (SplitCommitmentError, OSError) as e:
            print(f"Error: {e}")

    # Editors that save through a temporary file show up as a move onto the target
    on_moved = on_modified
    on_created = on_modified


def watch(table_file: Path, callback: Callable[[Path], None],
          debounce_seconds: float = DEBOUNCE_SECONDS):
    """
    Block until Ctrl+C, running ``callback`` on every change of ``table_file``.
    """
    table_file = Path(table_file)
    directory = table_file.resolve().parent
    if not directory.exists():
        raise FileNotFoundError(f"directory not found: {directory}")

    print(f"Watching {table_file} for changes. Press Ctrl+C to stop.\n")
    handler = TableChangeHandler(table_file, callback, debounce_seconds)
    observer = Observer()
    observer.schedule(handler, str(directory), recursive=False)
    observer.start()
    try:
        while True:
            time.sleep(1)
    except KeyboardInterrupt:
        print("\nStopping watcher...")
        observer.stop()
    observer.join()


# =============================================================================
# MAIN ENTRY POINT
# =============================================================================

def main():
    from run_experiments import cmd_nosig_check, print_nosig_report

    parser = argparse.ArgumentParser(
        description="Re-check an outcome-table file for no-signalling whenever it changes."
    )
    parser.add_argument("path", help="JSON or CSV outcome table")
    args = parser.parse_args()

    def check(path: Path):
        print_nosig_report(cmd_nosig_check(path))

    if Path(args.path).exists():
        check(Path(args.path))
    watch(Path(args.path), check)


if __name__ == "__main__":
    main()
