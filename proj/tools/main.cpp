#include <cstdio>

int main() {
  std::puts("ymlab: experiment runner placeholder");
  return 0;
}
