#include "rwsre/cli.hpp"

int main(int argc, char** argv) { return rwsre::cli::main(argc, argv); }
