from esgame.commands import main

raise SystemExit(main())
