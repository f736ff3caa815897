package com.example.app09;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 9;
        String title = "screen 9";
        System.out.println(title);
    }

    public void configure() {
        SecureRandom random = new SecureRandom();
        byte[] salt = new byte[16];
        random.nextBytes(salt);
    }

    public int compute(int a, int b) {
        int s = a * 11 + b;
        return s;
    }
}
