from cyclic_engine.cli_io import main

raise SystemExit(main())
