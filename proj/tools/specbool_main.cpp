#include "commands.hpp"

int main(int argc, char** argv) {
    return specbool::run_cli(argc, argv);
}
