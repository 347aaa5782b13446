from walkops.cli import main

main()
