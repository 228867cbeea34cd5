from srtrack.cli import main

main()
