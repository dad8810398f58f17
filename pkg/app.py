import sys
import traceback

from loopsim.cli import main as cli_main


def _global_excepthook(exctype, value, tb):
    # 未预期的异常：打印完整堆栈
    sys.stderr.write("\n=== 未捕获异常 ===\n")
    traceback.print_exception(exctype, value, tb)


def main():
    sys.excepthook = _global_excepthook
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
