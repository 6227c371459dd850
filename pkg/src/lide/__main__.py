from lide.cli import main

main()
