// Placeholder main while the pipeline modules land.
int main() { return 0; }
