from voxquery.harness.cli import main

raise SystemExit(main())
