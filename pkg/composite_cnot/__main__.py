from composite_cnot.main import run

# Report unexpected errors briefly; --debug adds the traceback
if __name__ == "__main__":
    import sys

    try:
        sys.exit(run())
    except Exception as e:
        print(f"\nERROR: {e}")

        if "--debug" in sys.argv or "-d" in sys.argv:
            import traceback

            traceback.print_exc()
        sys.exit(1)
