#include <iostream>

int main() {
  std::cout << "armrl: command-line harness (under construction)\n";
  return 0;
}
