#include <cstdio>

int main() {
    std::puts("lerw: command-line interface not wired up yet");
    return 2;
}
