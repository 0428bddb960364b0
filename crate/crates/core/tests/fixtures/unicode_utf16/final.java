// Grüße 😀 from the team
String s = "naïve café 😀";
int n = 2 + 1;
